# Decode module initializer
