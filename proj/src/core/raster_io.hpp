#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "types.hpp"

namespace krigrid {

// Decodes an 8-bit RGB(A) PNG and derives the weed mask by exact colour
// equality with weed_colour. Alpha, when present, is ignored.
SemanticRaster load_orthomosaic(const std::uint8_t* png_bytes, std::size_t size, Rgb weed_colour);
SemanticRaster load_orthomosaic_file(const std::string& path, Rgb weed_colour);

// Weed fraction over a window x window pixel block centred at (cx, cy).
// Windows are clipped at the raster border and normalised by the clipped area.
double weed_fraction_window(const SemanticRaster& raster, int cx, int cy, int window);

// n average-pooled samples at i.i.d. uniform positions over the raster extent,
// drawn from xoshiro256++ seeded with `seed`. Same inputs, same points.
std::vector<SamplePoint> sample_uniform(const SemanticRaster& raster, int n, int window,
                                        std::uint64_t seed);

// 8-bit grayscale PNG, pixel = round-half-up(value * 255).
void write_field_png(const ScalarField& field, const std::string& path);

// Reads a grayscale or RGB PNG back into a field with values k/255.
ScalarField read_field_png(const std::string& path);

// Raw field container (`GPF1` + u32 dims + f64 cells, little-endian); keeps
// full precision where PNG would quantise.
void write_field_gpf(const ScalarField& field, const std::string& path);
ScalarField read_field_gpf(const std::string& path);

// Sample sets round-trip as CSV with header `x,y,value`.
void write_samples_csv(const std::vector<SamplePoint>& samples, std::ostream& out);
void write_samples_csv_file(const std::vector<SamplePoint>& samples, const std::string& path);
std::vector<SamplePoint> read_samples_csv(std::istream& in);
std::vector<SamplePoint> read_samples_csv_file(const std::string& path);

} // namespace krigrid
