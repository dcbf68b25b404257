# Channel module initializer
