# Synth module initializer
