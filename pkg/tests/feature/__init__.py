"""Property suites and seeded acceptance runs"""
