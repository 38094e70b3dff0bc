//! Experiment driver library behind the `herzflow` binary.
