#pragma once

// Tag allocation: which masks get a numbered tag, where the tag goes, and
// how the tag is drawn onto the image.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "somlist/annotations.hpp"
#include "somlist/image.hpp"
#include "somlist/mask.hpp"

namespace som {

/// Granularity emulated by a minimum mask area, as a fraction of the image area.
struct GranularityLevel {
    int level = 2;
    double min_area_fraction = 0.005;

    /// Defaults 0.02 / 0.005 / 0.001 for levels 1 / 2 / 3.
    static GranularityLevel standard(int level);
};

/// Validates a user-supplied fraction triple (must be strictly decreasing, in (0,1]).
void validate_fractions(const std::array<double, 3>& fractions);

struct TagStyle {
    /// Uniform box colour; when unset the colour comes from the palette by tag_id mod 8.
    std::optional<Rgb> box_fill;
    Rgb text_color{255, 255, 255};
    int glyph_scale = 2;
    int padding = 2;

    void validate() const;
};

const std::array<Rgb, 8>& tag_palette();

struct TagPlacement {
    int tag_id = 0;
    Point anchor;
    Box label_box;
    std::int64_t annotation_id = 0;
    friend bool operator==(const TagPlacement&, const TagPlacement&) = default;
};

/// A label box that could not be moved clear of earlier boxes.
struct Collision {
    int tag_id = 0;
    std::vector<int> overlaps_with;
    friend bool operator==(const Collision&, const Collision&) = default;
};

struct SelectedMask {
    std::int64_t annotation_id = 0;
    std::int64_t category_id = 0;
    BinaryMask mask;
    Point anchor;
};

struct AnchorRef {
    Point anchor;
    std::int64_t annotation_id = 0;
};

struct OverlapResult {
    std::vector<TagPlacement> placements;
    std::vector<Collision> collisions;
};

struct TaggedImage {
    std::int64_t image_id = 0;
    RgbImage pixels;
    std::vector<TagPlacement> placements;
    std::vector<Collision> collisions;
};

/// Masks of `image_id` meeting the area threshold, ordered by tag number.
std::vector<SelectedMask> select_masks(const AnnotationSet& set, std::int64_t image_id, const GranularityLevel& level);

/// Per-pixel Chebyshev distance to the nearest background pixel, counting
/// everything outside the grid as background. Background pixels hold 0.
std::vector<int> chebyshev_distance(const BinaryMask& mask);

/// Discrete pole of inaccessibility; ties go to the smallest y, then x.
Point anchor_point(const BinaryMask& mask);

/// Label box dimensions for a tag number under `style`.
Box label_box_size(int tag_id, const TagStyle& style);

/// Numbers anchors 1..N in raster order and centres a label box on each.
std::vector<TagPlacement> assign_tags(std::span<const AnchorRef> anchors, const TagStyle& style, int width,
                                      int height);

/// Spiral offsets tried (in order) when a label box collides.
std::vector<Point> spiral_offsets(int step);

OverlapResult resolve_overlaps(std::span<const TagPlacement> placements, const TagStyle& style, int width,
                               int height);

RgbImage render_tags(const RgbImage& image, std::span<const TagPlacement> placements, const TagStyle& style);

/// select_masks -> anchor_point -> assign_tags -> resolve_overlaps -> render_tags.
TaggedImage tag_image(const AnnotationSet& set, std::int64_t image_id, const RgbImage& pixels,
                      const GranularityLevel& level, const TagStyle& style);

}  // namespace som
