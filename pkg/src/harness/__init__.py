# Harness module initializer
