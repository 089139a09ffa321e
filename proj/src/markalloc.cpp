#include "somlist/markalloc.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

#include "somlist/digit_font.hpp"
#include "somlist/errors.hpp"

namespace som {

namespace {

constexpr int kSpiralRings = 8;

int digit_count(int n) {
    int d = 1;
    while (n >= 10) {
        n /= 10;
        ++d;
    }
    return d;
}

}  // namespace

GranularityLevel GranularityLevel::standard(int level) {
    switch (level) {
        case 1: return {1, 0.02};
        case 2: return {2, 0.005};
        case 3: return {3, 0.001};
        default: throw ConfigError("granularity level must be 1, 2 or 3, got " + std::to_string(level));
    }
}

void validate_fractions(const std::array<double, 3>& f) {
    for (double v : f) {
        if (!(v > 0.0 && v <= 1.0)) {
            throw ConfigError("granularity fractions must lie in (0, 1]");
        }
    }
    if (!(f[0] > f[1] && f[1] > f[2])) {
        throw ConfigError("granularity fractions must decrease from level 1 to level 3");
    }
}

void TagStyle::validate() const {
    if (glyph_scale < 1) {
        throw ConfigError("glyph_scale must be >= 1");
    }
    if (padding < 0) {
        throw ConfigError("padding must be >= 0");
    }
}

const std::array<Rgb, 8>& tag_palette() {
    static const std::array<Rgb, 8> palette = {{
        {200, 30, 45},
        {30, 110, 200},
        {35, 140, 60},
        {150, 60, 170},
        {210, 105, 20},
        {20, 130, 140},
        {120, 80, 40},
        {60, 60, 60},
    }};
    return palette;
}

std::vector<SelectedMask> select_masks(const AnnotationSet& set, std::int64_t image_id, const GranularityLevel& level) {
    const ImageRecord* image = set.find_image(image_id);
    if (image == nullptr) {
        throw ReferentialError("image " + std::to_string(image_id) + " does not resolve", image_id);
    }
    const double threshold =
        level.min_area_fraction * static_cast<double>(image->width) * static_cast<double>(image->height);

    struct Candidate {
        const SegmentationAnnotation* ann;
        BinaryMask mask;
        std::int64_t area;
    };
    std::vector<Candidate> kept;
    for (const auto* ann : set.annotations_for(image_id)) {
        BinaryMask mask = annotation_mask(*ann, *image);
        std::int64_t area = mask_area(mask);
        if (area == 0 || static_cast<double>(area) < threshold) {
            continue;
        }
        kept.push_back({ann, std::move(mask), area});
    }

    std::vector<bool> dropped(kept.size(), false);
    if (level.level == 1) {
        for (std::size_t a = 0; a < kept.size(); ++a) {
            for (std::size_t b = 0; b < kept.size() && !dropped[a]; ++b) {
                if (a == b || kept[a].area > kept[b].area) {
                    continue;
                }
                // Equal area plus containment means identical masks; the earlier one survives.
                if (kept[a].area == kept[b].area && b > a) {
                    continue;
                }
                if (kept[a].mask.contained_in(kept[b].mask)) {
                    dropped[a] = true;
                }
            }
        }
    }

    std::vector<SelectedMask> out;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (dropped[i]) {
            continue;
        }
        Point anchor = anchor_point(kept[i].mask);
        out.push_back({kept[i].ann->id, kept[i].ann->category_id, std::move(kept[i].mask), anchor});
    }
    std::stable_sort(out.begin(), out.end(), [](const SelectedMask& a, const SelectedMask& b) {
        return std::tie(a.anchor.y, a.anchor.x, a.annotation_id) < std::tie(b.anchor.y, b.anchor.x, b.annotation_id);
    });
    return out;
}

std::vector<int> chebyshev_distance(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    constexpr int kInf = std::numeric_limits<int>::max() / 2;
    std::vector<int> d(static_cast<std::size_t>(w) * h);
    auto at = [&](int x, int y) -> int {
        if (x < 0 || y < 0 || x >= w || y >= h) {
            return 0;
        }
        return d[static_cast<std::size_t>(y) * w + x];
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            d[static_cast<std::size_t>(y) * w + x] = mask.at(x, y) ? kInf : 0;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int& v = d[static_cast<std::size_t>(y) * w + x];
            if (v == 0) {
                continue;
            }
            v = std::min({v, at(x - 1, y) + 1, at(x - 1, y - 1) + 1, at(x, y - 1) + 1, at(x + 1, y - 1) + 1});
        }
    }
    for (int y = h - 1; y >= 0; --y) {
        for (int x = w - 1; x >= 0; --x) {
            int& v = d[static_cast<std::size_t>(y) * w + x];
            if (v == 0) {
                continue;
            }
            v = std::min({v, at(x + 1, y) + 1, at(x + 1, y + 1) + 1, at(x, y + 1) + 1, at(x - 1, y + 1) + 1});
        }
    }
    return d;
}

Point anchor_point(const BinaryMask& mask) {
    const std::vector<int> d = chebyshev_distance(mask);
    int best = 0;
    Point best_pt;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            int v = d[static_cast<std::size_t>(y) * mask.width() + x];
            if (v > best) {
                best = v;
                best_pt = {x, y};
            }
        }
    }
    if (best == 0) {
        throw EmptyMaskError("cannot place an anchor on an empty mask");
    }
    return best_pt;
}

Box label_box_size(int tag_id, const TagStyle& style) {
    const int n = digit_count(tag_id);
    const int s = style.glyph_scale;
    const int w = n * font::kGlyphWidth * s + (n - 1) * font::kGlyphSpacing * s + 2 * style.padding;
    const int h = font::kGlyphHeight * s + 2 * style.padding;
    return {0, 0, w, h};
}

std::vector<TagPlacement> assign_tags(std::span<const AnchorRef> anchors, const TagStyle& style, int width,
                                      int height) {
    std::vector<AnchorRef> ordered(anchors.begin(), anchors.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const AnchorRef& a, const AnchorRef& b) {
        return std::tie(a.anchor.y, a.anchor.x) < std::tie(b.anchor.y, b.anchor.x);
    });
    std::vector<TagPlacement> out;
    out.reserve(ordered.size());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        const int tag_id = static_cast<int>(i) + 1;
        Box box = label_box_size(tag_id, style);
        box.w = std::min(box.w, width);
        box.h = std::min(box.h, height);
        box.x = std::clamp(ordered[i].anchor.x - box.w / 2, 0, width - box.w);
        box.y = std::clamp(ordered[i].anchor.y - box.h / 2, 0, height - box.h);
        out.push_back({tag_id, ordered[i].anchor, box, ordered[i].annotation_id});
    }
    return out;
}

std::vector<Point> spiral_offsets(int step) {
    static constexpr Point kDirections[] = {{0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}};
    std::vector<Point> out;
    out.reserve(kSpiralRings * 8);
    for (int ring = 1; ring <= kSpiralRings; ++ring) {
        for (const Point& d : kDirections) {
            out.push_back({d.x * ring * step, d.y * ring * step});
        }
    }
    return out;
}

OverlapResult resolve_overlaps(std::span<const TagPlacement> placements, const TagStyle& style, int width,
                               int height) {
    style.validate();
    OverlapResult result;
    result.placements.assign(placements.begin(), placements.end());
    std::sort(result.placements.begin(), result.placements.end(),
              [](const TagPlacement& a, const TagPlacement& b) { return a.tag_id < b.tag_id; });

    auto clear_of_earlier = [&](const Box& box, std::size_t upto) {
        for (std::size_t j = 0; j < upto; ++j) {
            if (box.intersects(result.placements[j].label_box)) {
                return false;
            }
        }
        return true;
    };

    for (std::size_t i = 0; i < result.placements.size(); ++i) {
        TagPlacement& p = result.placements[i];
        if (clear_of_earlier(p.label_box, i)) {
            continue;
        }
        bool placed = false;
        for (const Point& off : spiral_offsets(p.label_box.h)) {
            Box candidate = p.label_box;
            candidate.x += off.x;
            candidate.y += off.y;
            if (candidate.inside(width, height) && clear_of_earlier(candidate, i)) {
                p.label_box = candidate;
                placed = true;
                break;
            }
        }
        if (!placed) {
            Collision c{p.tag_id, {}};
            for (std::size_t j = 0; j < i; ++j) {
                if (p.label_box.intersects(result.placements[j].label_box)) {
                    c.overlaps_with.push_back(result.placements[j].tag_id);
                }
            }
            result.collisions.push_back(std::move(c));
        }
    }
    return result;
}

RgbImage render_tags(const RgbImage& image, std::span<const TagPlacement> placements, const TagStyle& style) {
    style.validate();
    RgbImage out = image;
    const int s = style.glyph_scale;
    for (const TagPlacement& p : placements) {
        const Box& box = p.label_box;
        if (box.w <= 0 || box.h <= 0 || !box.inside(image.width(), image.height())) {
            throw BoundsError("label box of tag " + std::to_string(p.tag_id) + " lies outside the image");
        }
        const Rgb fill = style.box_fill.value_or(tag_palette()[static_cast<std::size_t>(p.tag_id) % 8]);
        for (int y = box.y; y < box.bottom(); ++y) {
            for (int x = box.x; x < box.right(); ++x) {
                out.set(x, y, fill);
            }
        }
        const std::string digits = std::to_string(p.tag_id);
        int origin_x = box.x + style.padding;
        const int origin_y = box.y + style.padding;
        for (char ch : digits) {
            const int digit = ch - '0';
            for (int row = 0; row < font::kGlyphHeight; ++row) {
                for (int col = 0; col < font::kGlyphWidth; ++col) {
                    if (!font::glyph_bit(digit, col, row)) {
                        continue;
                    }
                    for (int dy = 0; dy < s; ++dy) {
                        for (int dx = 0; dx < s; ++dx) {
                            const int x = origin_x + col * s + dx;
                            const int y = origin_y + row * s + dy;
                            // Boxes cropped to tiny images clip their glyphs.
                            if (x < box.right() && y < box.bottom()) {
                                out.set(x, y, style.text_color);
                            }
                        }
                    }
                }
            }
            origin_x += (font::kGlyphWidth + font::kGlyphSpacing) * s;
        }
    }
    return out;
}

TaggedImage tag_image(const AnnotationSet& set, std::int64_t image_id, const RgbImage& pixels,
                      const GranularityLevel& level, const TagStyle& style) {
    style.validate();
    const ImageRecord* image = set.find_image(image_id);
    if (image == nullptr) {
        throw ReferentialError("image " + std::to_string(image_id) + " does not resolve", image_id);
    }
    if (pixels.width() != image->width || pixels.height() != image->height) {
        throw DimensionError("image " + std::to_string(image_id) + " pixels are " + std::to_string(pixels.width()) +
                             "x" + std::to_string(pixels.height()) + " but the annotation file says " +
                             std::to_string(image->width) + "x" + std::to_string(image->height));
    }
    std::vector<SelectedMask> selected = select_masks(set, image_id, level);
    std::vector<AnchorRef> anchors;
    anchors.reserve(selected.size());
    for (const auto& m : selected) {
        anchors.push_back({m.anchor, m.annotation_id});
    }
    OverlapResult resolved =
        resolve_overlaps(assign_tags(anchors, style, image->width, image->height), style, image->width, image->height);

    TaggedImage out;
    out.image_id = image_id;
    out.pixels = render_tags(pixels, resolved.placements, style);
    out.placements = std::move(resolved.placements);
    out.collisions = std::move(resolved.collisions);
    return out;
}

}  // namespace som
