x = 7
if x % 2 == 1:
    y = x / 2
else:
    y = x
print(y)
