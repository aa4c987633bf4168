counts = {}
for ch in "hello":
    counts[ch] = counts.get(ch, 0) + 1
print(counts)
