items = ["1", "x", "2", "3"]
total = 0
bad = 0
for s in items:
    try:
        total += int(s)
    except ValueError:
        bad += 1
print(total, bad)
