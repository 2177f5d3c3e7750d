//! Lock and back-off primitives, std-backed when available.

#[cfg(feature = "std")]
mod imp {
    pub(crate) struct Lock(std::sync::Mutex<()>);

    impl Lock {
        pub(crate) const fn new() -> Self {
            Self(std::sync::Mutex::new(()))
        }

        #[must_use]
        pub(crate) fn lock(&self) -> impl Sized + '_ {
            // The guarded data is `()`, so a poisoned lock carries no broken state.
            self.0.lock().unwrap_or_else(|e| e.into_inner())
        }
    }

    #[inline]
    pub(crate) fn relax() {
        std::thread::yield_now();
    }
}

#[cfg(all(not(feature = "std"), feature = "spin"))]
mod imp {
    pub(crate) struct Lock(spin::Mutex<()>);

    impl Lock {
        pub(crate) const fn new() -> Self {
            Self(spin::Mutex::new(()))
        }

        #[must_use]
        pub(crate) fn lock(&self) -> impl Sized + '_ {
            self.0.lock()
        }
    }

    #[inline]
    pub(crate) fn relax() {
        core::hint::spin_loop();
    }
}

#[cfg(not(any(feature = "std", feature = "spin")))]
compile_error!("enable either the `std` or the `spin` feature");

pub(crate) use imp::{relax, Lock};

impl core::fmt::Debug for Lock {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("Lock")
    }
}
