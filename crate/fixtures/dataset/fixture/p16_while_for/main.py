rows = [[1, 2, 3], [4, 5], [6]]
r = 0
best = 0
while r < len(rows):
    acc = 0
    for v in rows[r]:
        acc += v
    best = max(best, acc)
    r += 1
print(best)
