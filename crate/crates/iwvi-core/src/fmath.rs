//! Float math shims for `no_std` builds. All transcendentals route
//! through `libm` so the crate builds without `std`.

// On hosted targets std's inherent f64 methods shadow these, so the trait
// only resolves calls when the crate graph excludes std.
#[allow(dead_code)]
pub(crate) trait F64Math {
    fn ln(self) -> f64;
    fn ln_1p(self) -> f64;
    fn exp(self) -> f64;
    fn sqrt(self) -> f64;
    fn powf(self, p: f64) -> f64;
    fn cos(self) -> f64;
    fn sin(self) -> f64;
}

impl F64Math for f64 {
    #[inline]
    fn ln(self) -> f64 {
        libm::log(self)
    }
    #[inline]
    fn ln_1p(self) -> f64 {
        libm::log1p(self)
    }
    #[inline]
    fn exp(self) -> f64 {
        libm::exp(self)
    }
    #[inline]
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
    #[inline]
    fn powf(self, p: f64) -> f64 {
        libm::pow(self, p)
    }
    #[inline]
    fn cos(self) -> f64 {
        libm::cos(self)
    }
    #[inline]
    fn sin(self) -> f64 {
        libm::sin(self)
    }
}
