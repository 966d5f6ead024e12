//! Linear per-byte / per-second battery model.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    /// Joules.
    pub initial: f64,
    /// Joules per transmitted byte.
    pub tx_per_byte: f64,
    /// Joules per received byte.
    pub rx_per_byte: f64,
    /// Joules per second of idle listening.
    pub idle_per_sec: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams { initial: 10.0, tx_per_byte: 60e-6, rx_per_byte: 30e-6, idle_per_sec: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Debit {
    /// Bytes transmitted.
    Tx(usize),
    /// Bytes received.
    Rx(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyState {
    pub remaining: f64,
    pub alive: bool,
}

impl EnergyState {
    pub fn new(params: &EnergyParams) -> Self {
        EnergyState { remaining: params.initial, alive: params.initial > 0.0 }
    }

    /// Subtracts the cost of one operation. Returns `true` when this debit killed the node.
    pub fn debit(&mut self, params: &EnergyParams, what: Debit) -> bool {
        let cost = match what {
            Debit::Tx(bytes) => params.tx_per_byte * bytes as f64,
            Debit::Rx(bytes) => params.rx_per_byte * bytes as f64,
        };
        self.take(cost)
    }

    pub fn debit_idle(&mut self, params: &EnergyParams, seconds: f64) -> bool {
        self.take(params.idle_per_sec * seconds.max(0.0))
    }

    fn take(&mut self, joules: f64) -> bool {
        if !self.alive || joules <= 0.0 {
            return false;
        }
        self.remaining -= joules;
        if self.remaining <= 0.0 {
            self.remaining = 0.0;
            self.alive = false;
            return true;
        }
        false
    }
}
