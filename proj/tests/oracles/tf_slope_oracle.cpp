// Independent check of the universal TF slope y'(0): shooting in t = sqrt(x),
// where y_t = 2 t p and p_t = 2 y^{3/2} are smooth at the origin. Too steep a
// slope drives y through zero, too shallow a slope turns y upwards; bisection
// on the slope brackets the separatrix. Prints the slope at two step sizes.
#include <cmath>
#include <cstdio>

using real = long double;

// +1: y turned upward (slope too shallow), -1: y crossed zero (too steep).
int shoot(real s, real dt) {
  real t = 0, y = 1, p = s;
  auto f = [](real t, real y, real p, real& dy, real& dp) {
    dy = 2 * t * p;
    dp = 2 * std::pow(std::max(y, real(0)), real(1.5));
  };
  for (int k = 0; k < 100000000; ++k) {
    real a1, b1, a2, b2, a3, b3, a4, b4;
    f(t, y, p, a1, b1);
    f(t + dt / 2, y + dt / 2 * a1, p + dt / 2 * b1, a2, b2);
    f(t + dt / 2, y + dt / 2 * a2, p + dt / 2 * b2, a3, b3);
    f(t + dt, y + dt * a3, p + dt * b3, a4, b4);
    y += dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4);
    p += dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4);
    t += dt;
    if (y <= 0)
      return -1;
    if (p > 0)
      return +1;
  }
  return 0;
}

real slope(real dt) {
  real lo = -1.7, hi = -1.5; // lo too steep, hi too shallow
  for (int k = 0; k < 60; ++k) {
    const real mid = (lo + hi) / 2;
    (shoot(mid, dt) < 0 ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

int main() {
  const real a = slope(1e-3L), b = slope(5e-4L);
  // RK4: error ~ dt^4, Richardson with factor 16.
  std::printf("dt=1e-3  %.15Lf\ndt=5e-4  %.15Lf\nextrap   %.15Lf\n", a, b, b + (b - a) / 15);
}
