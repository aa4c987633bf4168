d = int(input())
try:
    q = 10 // d
except ZeroDivisionError:
    q = -1
print(q)
