# magic-factory-sim package initializer
