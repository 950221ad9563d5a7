"""Environment builders: the 5x4 GridWorld and random layered instances."""
