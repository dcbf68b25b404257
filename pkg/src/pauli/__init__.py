# Pauli module initializer
