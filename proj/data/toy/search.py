def find(items, target):
    index = 0
    for item in items:
        if item == target:
            return index
        index += 1
    return -1

def contains(items, target):
    return find(items, target) >= 0

def max_value(items):
    best = items[0]
    for item in items:
        if item > best:
            best = item
    return best
