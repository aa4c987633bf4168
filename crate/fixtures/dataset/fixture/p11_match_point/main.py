point = (7, 2)
match point:
    case (0, 0):
        result = (0, 0)
    case (x, y):
        result = (y, x)
print(result)
