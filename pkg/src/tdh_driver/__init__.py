"""Task-difficulty-homeostasis collision-avoidance steering model."""
