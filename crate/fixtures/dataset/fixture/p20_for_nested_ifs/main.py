limit = int(input())
hits = []
for i in range(limit):
    if i % 2 == 0:
        if i % 3 == 0:
            hits.append(i)
print(hits)
