n = int(input())
l = int(input())
diff = []
for i in range(1, n + 1):
    value = l + i - 1
    if value < 0:
        value = -1 * value
    diff.append(value)
min_index = diff.index(min(diff))
print(min_index)
