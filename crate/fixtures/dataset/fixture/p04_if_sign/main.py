x = int(input())
if x > 0:
    print("pos")
elif x < 0:
    print("neg")
else:
    print("zero")
