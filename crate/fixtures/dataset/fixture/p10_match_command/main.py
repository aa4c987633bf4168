cmd = input().strip()
match cmd:
    case "go":
        msg = "moving"
    case "stop":
        msg = "halted"
    case _:
        msg = "unknown"
print(msg)
