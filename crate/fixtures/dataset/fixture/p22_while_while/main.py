i = 0
pairs = 0
while i < 40:
    j = 0
    while j < i:
        if (i + j) % 7 == 0:
            pairs += 1
        j += 1
    i += 1
print(pairs)
