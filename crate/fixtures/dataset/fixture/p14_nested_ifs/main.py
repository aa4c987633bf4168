a = int(input())
b = int(input())
ok = False
if a > 0:
    if b > 0:
        ok = True
    else:
        ok = a > 2
print(ok)
