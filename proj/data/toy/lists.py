def first(items):
    if not items:
        return None
    return items[0]

def append_twice(items, value):
    items.append(value)
    items.append(value)
    return items

def squares(n):
    out = []
    for i in range(n):
        out.append(i * i)
    return out
