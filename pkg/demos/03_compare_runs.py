"""Repeat training over seeds and test the VAE/C-VAE difference."""

from chaosvae.data import split_one_class, synth_occ
from chaosvae.experiment import compare
from chaosvae.vae import TrainConfig

split = split_one_class(synth_occ(seed=11, n_neg=300, n_pos=40, nf=6, shift=0.05))

# each run takes the best CR over a small grid
grid = {"activation": ["relu", "tanh"], "epochs": [10, 20]}
summary = compare(split, TrainConfig(), "train_percentile(99)", run_count=5,
                  base_seed=0, grid=grid, dataset_tag="synthetic")
print(summary.to_text())

# per-run best CRs behind the table
for tag, series in summary.series.items():
    print(tag, series.best_cr_per_run)
