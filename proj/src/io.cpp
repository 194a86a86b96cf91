namespace stablecut {}
