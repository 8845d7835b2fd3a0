pub mod cubic;
pub mod gutzwiller;
pub mod ode;
pub mod poly;
pub mod trajectory;
