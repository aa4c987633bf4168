values = [1, "a", 2.5, 3, "bc"]
total = 0.0
for v in values:
    match v:
        case int():
            total += v
        case str():
            total += len(v)
        case _:
            total += v * 2
print(total)
