//! Resource limits shared by the enumerators.

/// Env var that overrides [`Caps::max_rays`].
pub const CAP_RAYS_ENV: &str = "BELLSCOPE_CAP_RAYS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Largest number of functions an enumeration may produce.
    pub max_functions: u128,
    /// Largest truth table (c^n).
    pub max_table: usize,
    /// Largest intermediate ray count in double description.
    pub max_rays: usize,
    /// Largest group size materialized when walking orbits.
    pub max_orbit: usize,
}

impl Default for Caps {
    fn default() -> Self {
        let max_rays = std::env::var(CAP_RAYS_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(400_000);
        Caps {
            max_functions: 1 << 24,
            max_table: 1 << 20,
            max_rays,
            max_orbit: 5_000_000,
        }
    }
}

impl Caps {
    pub fn with_rays(mut self, rays: usize) -> Self {
        self.max_rays = rays;
        self
    }
}
