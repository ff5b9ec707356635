"""Dev benchmark: desk-scale criterion-5 feasibility. Not part of the package."""
import sys
import time

import numpy as np

sys.path.insert(0, "src")

from cdtsep import (AudioBuffer, ResynthesisConfig, TrainConfig, bss_eval,
                    build_training_set, equalize_rms, extract_frames, init_mlp,
                    mix_monaural, monaural_scene, normalize_unit,
                    separate_signal, train_sgd)


def harmonic_voice(f0, partials, duration, rate, seed):
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * rate)) / rate
    sig = np.zeros(len(t))
    for k in partials:
        sig += np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi)) / k
    f1, p1 = 1.3 * rng.uniform(0.8, 1.2), rng.uniform(0, 2 * np.pi)
    f2, p2 = 0.37 * rng.uniform(0.8, 1.2), rng.uniform(0, 2 * np.pi)
    env = (0.55 + 0.45 * np.sin(2 * np.pi * f1 * t + p1)) * \
          (0.55 + 0.45 * np.sin(2 * np.pi * f2 * t + p2))
    sig *= env
    return sig / np.max(np.abs(sig)) * 0.8


RATE = 4000
W = 128
HOP = 16
EPOCHS = int(sys.argv[1]) if len(sys.argv) > 1 else 50
SEED = int(sys.argv[2]) if len(sys.argv) > 2 else 0
N = 32

va = AudioBuffer.from_mono(harmonic_voice(110, (1, 3, 5, 7, 9), 65, RATE, 10), RATE)
vb = AudioBuffer.from_mono(harmonic_voice(220, (1, 2, 3, 4), 65, RATE, 20), RATE)
va, vb = equalize_rms(va, vb)
sc = monaural_scene(va, vb)

n_train = 60 * RATE
n_test = 5 * RATE


def sl(buf, a, b):
    return AudioBuffer(buf.samples[:, a:b], buf.sample_rate)


train_mix, test_mix = sl(sc.mixture, 0, n_train), sl(sc.mixture, n_train, n_train + n_test)
train_a, test_a = sl(sc.reference_a, 0, n_train), sl(sc.reference_a, n_train, n_train + n_test)
train_b, test_b = sl(sc.reference_b, 0, n_train), sl(sc.reference_b, n_train, n_train + n_test)

nm, _ = normalize_unit(train_mix)
na, _ = normalize_unit(train_a)
nb, _ = normalize_unit(train_b)
data = build_training_set(extract_frames(nm.mono(), W, HOP),
                          extract_frames(na.mono(), W, HOP),
                          extract_frames(nb.mono(), W, HOP))
print(f"training examples: {data.num_examples}")

net = init_mlp([W, 256, 2 * W], SEED)
t0 = time.monotonic()
net, hist = train_sgd(net, data, TrainConfig(epochs=EPOCHS, learning_rate=0.05, seed=SEED))
t1 = time.monotonic()
print(f"train {EPOCHS} epochs: {t1-t0:.1f}s  loss {hist[0]:.5f} -> {hist[-1]:.5f}")

ntest, params = normalize_unit(test_mix)
t0 = time.monotonic()
est_a, est_b = separate_signal(net, ntest, W, ResynthesisConfig(n_passes=N, seed=SEED))
t1 = time.monotonic()
print(f"separate N={N}: {t1-t0:.1f}s")

refs = [test_a.mono(), test_b.mono()]
m = bss_eval([est_a.mono(), est_b.mono()], refs, 512)
base = bss_eval([test_mix.mono(), test_mix.mono()], refs, 512)
print(f"baseline SIR: a {base.sir_db[0]:.2f}  b {base.sir_db[1]:.2f}")
print(f"separated SIR: a {m.sir_db[0]:.2f}  b {m.sir_db[1]:.2f}")
print(f"separated SDR: a {m.sdr_db[0]:.2f}  b {m.sdr_db[1]:.2f}")
print(f"separated SAR: a {m.sar_db[0]:.2f}  b {m.sar_db[1]:.2f}")
print(f"SIR gain: a {m.sir_db[0]-base.sir_db[0]:.2f}  b {m.sir_db[1]-base.sir_db[1]:.2f}")
