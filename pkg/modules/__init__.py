# Modules package for DuplexSched: channels, scheduling, rates, capacities, experiments
