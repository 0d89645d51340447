"""GNG graph shape signatures compared with an order-penalized EMD."""
