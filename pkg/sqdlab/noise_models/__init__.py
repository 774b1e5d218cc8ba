from .bit_flip import BitFlipNoise, apply_bitflip_noise, calibrate_bit_flip, correct_number_probability, error_free_fraction

# Alias for the default noise model
DefaultNoiseModel = BitFlipNoise
