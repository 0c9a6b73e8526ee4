//! Acceptance checks for `sporex`, run as the `acceptance` test target.
