n = int(input())
acc = 0
odd = 0
for i in range(n):
    if i % 2 == 1:
        odd += 1
        acc += i
    elif i % 5 == 0:
        acc -= 1
while acc > 1000:
    acc = acc // 3
print(acc / odd)
