# experiments package
