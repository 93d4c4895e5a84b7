def count_even(items):
    count = 0
    for item in items:
        if item % 2 == 0:
            count += 1
    return count

def countdown(n):
    while n > 0:
        print(n)
        n -= 1
    return None
