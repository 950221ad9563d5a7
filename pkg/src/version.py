VERSION = "v0.1.0"
