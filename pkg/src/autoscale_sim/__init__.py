"""Deterministic desk-scale simulator of proactive and reactive Kubernetes autoscalers.

Modules map onto the pieces of the system:

- ``simcore``: the simulated deployment (pods, requests, ticks)
- ``loadgen``: seeded four-phase open-loop load
- ``metrics``: 15-second scrapes and utilization
- ``baselines``: HPA-style and KEDA-style reactive controllers
- ``forecaster``: numpy LSTM memory forecaster
- ``agent``: numpy dueling DQN with replay and target network
- ``reward``: context-aware multi-objective reward
- ``graph``: the six-node decision cycle
- ``store``: JSON model archives
- ``harness``: experiment runner, training and CLI
"""
__version__ = "0.1.0"
