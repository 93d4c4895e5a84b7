third_party_dir = "vendor"
debug = False
if debug:
    print(third_party_dir)
