k = int(input())
squares = []
for i in range(k):
    squares.append(i * i)
print(squares)
