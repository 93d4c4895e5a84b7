# helpers for labels
def greet(name):
    message = "hello " + name
    print(message)
    return message

def is_empty(text):
    return len(text) == 0

def shout(text):
    return text.upper() + "!"
