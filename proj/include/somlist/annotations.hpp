#pragma once

// COCO-style instance annotations and the masks they describe.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "somlist/mask.hpp"

namespace som {

struct ImageRecord {
    std::int64_t id = 0;
    int width = 0;
    int height = 0;
    std::string file_name;
    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct CategoryRecord {
    std::int64_t id = 0;
    std::string name;
    friend bool operator==(const CategoryRecord&, const CategoryRecord&) = default;
};

/// One or more flat x,y rings; the object is their union.
struct PolygonSegmentation {
    std::vector<std::vector<double>> rings;
    friend bool operator==(const PolygonSegmentation&, const PolygonSegmentation&) = default;
};

/// Uncompressed COCO RLE: column-major runs, first run is background.
struct RleSegmentation {
    int height = 0;
    int width = 0;
    std::vector<std::uint32_t> counts;
    friend bool operator==(const RleSegmentation&, const RleSegmentation&) = default;
};

using Segmentation = std::variant<PolygonSegmentation, RleSegmentation>;

struct BBox {
    double x = 0, y = 0, w = 0, h = 0;
    friend bool operator==(const BBox&, const BBox&) = default;
};

struct SegmentationAnnotation {
    std::int64_t id = 0;
    std::int64_t image_id = 0;
    std::int64_t category_id = 0;
    Segmentation segmentation;
    BBox bbox;
    double area = 0;
    friend bool operator==(const SegmentationAnnotation&, const SegmentationAnnotation&) = default;
};

/// Parsed annotation file. Referential integrity is checked on construction.
class AnnotationSet {
public:
    AnnotationSet() = default;
    AnnotationSet(std::vector<ImageRecord> images, std::vector<CategoryRecord> categories,
                  std::vector<SegmentationAnnotation> annotations);

    const std::vector<ImageRecord>& images() const { return images_; }
    const std::vector<CategoryRecord>& categories() const { return categories_; }
    const std::vector<SegmentationAnnotation>& annotations() const { return annotations_; }

    const ImageRecord* find_image(std::int64_t id) const;
    const CategoryRecord* find_category(std::int64_t id) const;
    const SegmentationAnnotation* find_annotation(std::int64_t id) const;

    /// Annotations on one image, in file order.
    std::vector<const SegmentationAnnotation*> annotations_for(std::int64_t image_id) const;

private:
    std::vector<ImageRecord> images_;
    std::vector<CategoryRecord> categories_;
    std::vector<SegmentationAnnotation> annotations_;
    std::unordered_map<std::int64_t, std::size_t> image_index_;
    std::unordered_map<std::int64_t, std::size_t> category_index_;
    std::unordered_map<std::int64_t, std::size_t> annotation_index_;
};

AnnotationSet parse_annotation_file(std::string_view json_bytes);
AnnotationSet load_annotation_file(const std::filesystem::path& path);

BinaryMask decode_rle(int height, int width, std::span<const std::uint32_t> counts);
RleSegmentation encode_rle(const BinaryMask& mask);

/// COCO compressed RLE string <-> run lengths.
std::vector<std::uint32_t> rle_counts_from_string(std::string_view encoded);
std::string rle_counts_to_string(std::span<const std::uint32_t> counts);

/// Even-odd fill, sampled at pixel centers.
BinaryMask rasterize_polygon(std::span<const double> points, int width, int height);

/// Materializes an annotation's mask at the parent image's resolution.
BinaryMask annotation_mask(const SegmentationAnnotation& ann, const ImageRecord& image);

}  // namespace som
