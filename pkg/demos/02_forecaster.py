# %% [markdown]
# # LSTM memory forecaster
# Bootstrap data comes from HPA-driven runs. The last run is held out whole,
# so overlapping windows of one trace never straddle the split.
# The full five-seed fit takes about ten seconds.

# %%
import numpy as np

from autoscale_sim import forecaster as fc
from autoscale_sim.harness import ExperimentConfig
from autoscale_sim.harness.training import bootstrap_series, train_forecaster

cfg = ExperimentConfig()
series = bootstrap_series(cfg, seeds=[0])[0]
print("first scrapes (total_mem_mib, pods):")
print(np.array2string(series[:8], precision=1, suppress_small=True))

# %%
fit = train_forecaster(cfg, seeds=(0, 1, 2, 3, 4), epochs=1500, lr=0.1)
print({k: round(v, 4) if isinstance(v, float) else v for k, v in fit.summary().items()})

# %% [markdown]
# Predictions on the held-out run next to what was actually scraped one
# interval later. The confidence score maps MAPE linearly onto [0, 1].

# %%
held_out = fc.make_windows(bootstrap_series(cfg, seeds=[4])[0])
for window, actual in held_out[::3]:
    pred = fit.model.predict(window, confidence=fc.confidence(fit.test_mape)).predicted_total_mem_mib
    print(f"predicted {pred:7.1f}  actual {actual:7.1f}")
print(f"confidence at this MAPE: {fc.confidence(fit.test_mape):.3f}")
