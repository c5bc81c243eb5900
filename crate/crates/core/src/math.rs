//! Float intrinsics that resolve to `std` when available and to `libm` otherwise.

macro_rules! unary {
    ($($name:ident => $lname:ident),* $(,)?) => {
        $(
            #[cfg(feature = "std")]
            #[inline]
            pub fn $name(x: f64) -> f64 {
                x.$name()
            }

            #[cfg(not(feature = "std"))]
            #[inline]
            pub fn $name(x: f64) -> f64 {
                libm::$lname(x)
            }
        )*
    };
}

macro_rules! binary {
    ($($name:ident => $lname:ident),* $(,)?) => {
        $(
            #[cfg(feature = "std")]
            #[inline]
            pub fn $name(x: f64, y: f64) -> f64 {
                x.$name(y)
            }

            #[cfg(not(feature = "std"))]
            #[inline]
            pub fn $name(x: f64, y: f64) -> f64 {
                libm::$lname(x, y)
            }
        )*
    };
}

unary!(sqrt => sqrt, sin => sin, cos => cos, exp => exp, ln => log, floor => floor, ceil => ceil, round => round);
binary!(atan2 => atan2, hypot => hypot, powf => pow);
