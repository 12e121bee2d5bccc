"""Train a Gaussian-noise VAE and a chaotic-noise VAE on synthetic fraud data."""

from chaosvae.data import split_one_class, synth_occ
from chaosvae.experiment import run_single
from chaosvae.occ import ThresholdStrategy
from chaosvae.vae import TrainConfig

# genuine rows cluster at 0.3, fraud rows at 0.3 + shift
split = split_one_class(synth_occ(seed=7, n_neg=500, n_pos=50, nf=8, shift=0.4))
print("train", split.X_train.shape, "test", split.X_test.shape)

strategy = ThresholdStrategy.parse("train_percentile(99)")
for model in ("vae", "cvae"):
    cfg = TrainConfig(noise=model, epochs=100, learning_rate=0.001, optimizer="adam")
    result = run_single(split, cfg, strategy)
    print(f"{model}: loss {result.trace[0]:.4f} -> {result.trace[-1]:.4f}, "
          f"threshold {result.report.threshold:.5f}, CR {result.report.cr:.1f}")

# a harder split where the classes overlap
hard = split_one_class(synth_occ(seed=7, n_neg=500, n_pos=50, nf=8, shift=0.05))
for model in ("vae", "cvae"):
    cfg = TrainConfig(noise=model, epochs=50)
    print(f"{model} on shift 0.05: CR {run_single(hard, cfg, strategy).report.cr:.1f}")
