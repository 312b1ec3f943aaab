#pragma once

#include <stdexcept>
#include <string>

#include "ridgerec/image.hpp"

namespace ridgerec {

struct PgmError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Binary PGM (P5), maxval 255. Intensity i is stored as round(i * 255);
// loading divides by 255, so save -> load -> save is byte-identical.
GrayImage load_pgm(const std::string& path);
void save_pgm(const GrayImage& image, const std::string& path);

}  // namespace ridgerec
