"""Online learners over prototype families."""
