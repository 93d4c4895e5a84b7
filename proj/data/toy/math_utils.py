def add(a, b):
    return a + b

def clamp(x, low, high):
    if x < low:
        return low
    elif x > high:
        return high
    return x

def mean(values):
    total = 0
    for v in values:
        total += v
    return total / len(values)
