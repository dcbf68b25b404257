# Circuit module initializer
