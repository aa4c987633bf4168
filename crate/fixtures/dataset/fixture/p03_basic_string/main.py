# builds a short label
s = "exe"
label = s.upper() + "R"
print(label)
