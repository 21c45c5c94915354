#pragma once

namespace rescap::detail {

/// z^n for n >= 0 by repeated squaring, with z^0 = 1 for every z.
template <class T>
T ipow(T z, long n) {
    T result(1);
    while (n > 0) {
        if (n & 1) result *= z;
        z *= z;
        n >>= 1;
    }
    return result;
}

}  // namespace rescap::detail
