# Codes module initializer
