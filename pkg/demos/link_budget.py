"""
From distance to upload time
============================

A user's upload latency is set by path loss, a Rayleigh fading draw and the
bandwidth it gets. This walks one link through each stage.
"""

import numpy as np

from flmob import channel
from flmob.core import SimConfig, derive_stream

config = SimConfig()

# Path loss grows by 37.6 dB per decade of distance.
for d in (10.0, 100.0, 500.0, 1000.0):
    print(f"{d:7.0f} m  path loss {channel.path_loss_db(d):6.1f} dB")

# Fading is an Exp(1) power gain, drawn fresh every round.
stream = derive_stream(0, "fading", 0)
gain = channel.draw_gain(250.0, stream)
g = channel.spectral_efficiency(gain, config)
print(f"\n250 m with fading: spectral efficiency {g:.3f} bit/s/Hz")

# Upload of a 1 Mbit model over half a MHz, and over the whole BS.
for bw in (0.5, 1.0):
    rate = channel.uplink_rate(bw, channel.snr(gain, config))
    print(f"{bw} MHz -> {rate / 1e6:.3f} Mbit/s, upload {channel.upload_latency(config.model_size_bits, rate):.3f} s")
