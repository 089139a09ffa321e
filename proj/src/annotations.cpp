#include "somlist/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "somlist/errors.hpp"

namespace som {

namespace {

using nlohmann::json;

// COCO bboxes are float-valued and routinely overshoot the border by a fraction of a pixel.
constexpr double kBBoxTolerance = 1.0;

std::string ann_tag(std::int64_t id) { return "annotation " + std::to_string(id); }

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw DataError(where + ": missing field '" + key + "'");
    }
    return *it;
}

std::int64_t require_int(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number_integer()) {
        throw DataError(where + ": field '" + key + "' must be an integer");
    }
    return v.get<std::int64_t>();
}

double require_number(const json& v, const std::string& where) {
    if (!v.is_number()) {
        throw DataError(where + ": expected a number");
    }
    double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw DataError(where + ": non-finite number");
    }
    return d;
}

std::vector<std::uint32_t> parse_counts(const json& counts, const std::string& where) {
    if (counts.is_string()) {
        return rle_counts_from_string(counts.get<std::string>());
    }
    if (!counts.is_array()) {
        throw DataError(where + ": RLE counts must be an array or a string");
    }
    std::vector<std::uint32_t> out;
    out.reserve(counts.size());
    for (const auto& c : counts) {
        if (!c.is_number_integer() || c.get<std::int64_t>() < 0) {
            throw DataError(where + ": RLE counts must be non-negative integers");
        }
        out.push_back(c.get<std::uint32_t>());
    }
    return out;
}

Segmentation parse_segmentation(const json& seg, const ImageRecord& image, const std::string& where) {
    if (seg.is_array()) {
        PolygonSegmentation poly;
        for (const auto& ring : seg) {
            if (!ring.is_array()) {
                throw ShapeError(where + ": polygon ring must be a flat coordinate array");
            }
            if (ring.size() % 2 != 0 || ring.size() < 6) {
                throw ShapeError(where + ": polygon ring needs an even number (>= 6) of coordinates, got " +
                                 std::to_string(ring.size()));
            }
            std::vector<double> pts;
            pts.reserve(ring.size());
            for (const auto& v : ring) {
                pts.push_back(require_number(v, where));
            }
            poly.rings.push_back(std::move(pts));
        }
        if (poly.rings.empty()) {
            throw ShapeError(where + ": empty polygon list");
        }
        return poly;
    }
    if (seg.is_object()) {
        const json& size = require(seg, "size", where);
        if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() || !size[1].is_number_integer()) {
            throw DataError(where + ": RLE size must be [height, width]");
        }
        RleSegmentation rle;
        rle.height = size[0].get<int>();
        rle.width = size[1].get<int>();
        rle.counts = parse_counts(require(seg, "counts", where), where);
        if (rle.height != image.height || rle.width != image.width) {
            throw DimensionError(where + ": RLE size does not match image " + std::to_string(image.id));
        }
        std::uint64_t total = std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
        if (total != static_cast<std::uint64_t>(rle.height) * static_cast<std::uint64_t>(rle.width)) {
            throw DimensionError(where + ": RLE run lengths sum to " + std::to_string(total) + ", expected " +
                                 std::to_string(static_cast<std::uint64_t>(rle.height) * rle.width));
        }
        return rle;
    }
    throw DataError(where + ": segmentation must be a polygon list or an RLE object");
}

}  // namespace

AnnotationSet::AnnotationSet(std::vector<ImageRecord> images, std::vector<CategoryRecord> categories,
                             std::vector<SegmentationAnnotation> annotations)
    : images_(std::move(images)), categories_(std::move(categories)), annotations_(std::move(annotations)) {
    for (std::size_t i = 0; i < images_.size(); ++i) {
        const auto& im = images_[i];
        if (im.width <= 0 || im.height <= 0) {
            throw DataError("image " + std::to_string(im.id) + ": width and height must be positive");
        }
        if (!image_index_.emplace(im.id, i).second) {
            throw DataError("duplicate image id " + std::to_string(im.id));
        }
    }
    for (std::size_t i = 0; i < categories_.size(); ++i) {
        const auto& cat = categories_[i];
        if (cat.name.empty()) {
            throw DataError("category " + std::to_string(cat.id) + ": empty name");
        }
        if (!category_index_.emplace(cat.id, i).second) {
            throw DataError("duplicate category id " + std::to_string(cat.id));
        }
    }
    for (std::size_t i = 0; i < annotations_.size(); ++i) {
        const auto& ann = annotations_[i];
        const ImageRecord* image = find_image(ann.image_id);
        if (image == nullptr) {
            throw ReferentialError(ann_tag(ann.id) + ": image_id " + std::to_string(ann.image_id) + " does not resolve",
                                   ann.id);
        }
        if (find_category(ann.category_id) == nullptr) {
            throw ReferentialError(
                ann_tag(ann.id) + ": category_id " + std::to_string(ann.category_id) + " does not resolve", ann.id);
        }
        if (!annotation_index_.emplace(ann.id, i).second) {
            throw DataError("duplicate annotation id " + std::to_string(ann.id));
        }
        if (!(ann.area > 0)) {
            throw DataError(ann_tag(ann.id) + ": area must be positive");
        }
        const BBox& b = ann.bbox;
        if (b.w < 0 || b.h < 0 || b.x < -kBBoxTolerance || b.y < -kBBoxTolerance ||
            b.x + b.w > image->width + kBBoxTolerance || b.y + b.h > image->height + kBBoxTolerance) {
            throw BoundsError(ann_tag(ann.id) + ": bbox lies outside image " + std::to_string(image->id));
        }
    }
}

const ImageRecord* AnnotationSet::find_image(std::int64_t id) const {
    auto it = image_index_.find(id);
    return it == image_index_.end() ? nullptr : &images_[it->second];
}

const CategoryRecord* AnnotationSet::find_category(std::int64_t id) const {
    auto it = category_index_.find(id);
    return it == category_index_.end() ? nullptr : &categories_[it->second];
}

const SegmentationAnnotation* AnnotationSet::find_annotation(std::int64_t id) const {
    auto it = annotation_index_.find(id);
    return it == annotation_index_.end() ? nullptr : &annotations_[it->second];
}

std::vector<const SegmentationAnnotation*> AnnotationSet::annotations_for(std::int64_t image_id) const {
    std::vector<const SegmentationAnnotation*> out;
    for (const auto& ann : annotations_) {
        if (ann.image_id == image_id) {
            out.push_back(&ann);
        }
    }
    return out;
}

AnnotationSet parse_annotation_file(std::string_view json_bytes) {
    json doc;
    try {
        doc = json::parse(json_bytes.begin(), json_bytes.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed annotation JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object()) {
        throw DataError("annotation file must be a JSON object");
    }
    for (const char* key : {"images", "annotations", "categories"}) {
        if (!doc.contains(key) || !doc[key].is_array()) {
            throw DataError(std::string("annotation file: '") + key + "' must be an array");
        }
    }

    std::vector<ImageRecord> images;
    std::unordered_map<std::int64_t, ImageRecord> by_id;
    for (const auto& j : doc["images"]) {
        ImageRecord im;
        im.id = require_int(j, "id", "image");
        std::string where = "image " + std::to_string(im.id);
        im.width = static_cast<int>(require_int(j, "width", where));
        im.height = static_cast<int>(require_int(j, "height", where));
        const json& fn = require(j, "file_name", where);
        if (!fn.is_string()) {
            throw DataError(where + ": file_name must be a string");
        }
        im.file_name = fn.get<std::string>();
        by_id.emplace(im.id, im);
        images.push_back(std::move(im));
    }

    std::vector<CategoryRecord> categories;
    for (const auto& j : doc["categories"]) {
        CategoryRecord cat;
        cat.id = require_int(j, "id", "category");
        const json& name = require(j, "name", "category " + std::to_string(cat.id));
        if (!name.is_string()) {
            throw DataError("category " + std::to_string(cat.id) + ": name must be a string");
        }
        cat.name = name.get<std::string>();
        for (auto& ch : cat.name) {
            if (ch >= 'A' && ch <= 'Z') {
                ch = static_cast<char>(ch - 'A' + 'a');
            }
        }
        categories.push_back(std::move(cat));
    }

    std::vector<SegmentationAnnotation> annotations;
    for (const auto& j : doc["annotations"]) {
        SegmentationAnnotation ann;
        ann.id = require_int(j, "id", "annotation");
        std::string where = ann_tag(ann.id);
        ann.image_id = require_int(j, "image_id", where);
        ann.category_id = require_int(j, "category_id", where);
        auto image = by_id.find(ann.image_id);
        if (image == by_id.end()) {
            throw ReferentialError(where + ": image_id " + std::to_string(ann.image_id) + " does not resolve", ann.id);
        }
        ann.segmentation = parse_segmentation(require(j, "segmentation", where), image->second, where);
        const json& bbox = require(j, "bbox", where);
        if (!bbox.is_array() || bbox.size() != 4) {
            throw DataError(where + ": bbox must be [x, y, w, h]");
        }
        ann.bbox = {require_number(bbox[0], where), require_number(bbox[1], where), require_number(bbox[2], where),
                    require_number(bbox[3], where)};
        ann.area = require_number(require(j, "area", where), where);
        annotations.push_back(std::move(ann));
    }

    return AnnotationSet(std::move(images), std::move(categories), std::move(annotations));
}

AnnotationSet load_annotation_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open annotation file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_annotation_file(ss.str());
}

BinaryMask decode_rle(int height, int width, std::span<const std::uint32_t> counts) {
    if (height < 0 || width < 0) {
        throw DimensionError("RLE size must be non-negative");
    }
    const std::uint64_t n = static_cast<std::uint64_t>(height) * static_cast<std::uint64_t>(width);
    std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    if (total != n) {
        throw DimensionError("RLE run lengths sum to " + std::to_string(total) + ", expected " + std::to_string(n));
    }
    BinaryMask mask(width, height);
    std::uint64_t pos = 0;
    bool value = false;
    for (std::uint32_t run : counts) {
        if (value) {
            for (std::uint64_t k = pos; k < pos + run; ++k) {
                // column-major: k = x * height + y
                mask.set(static_cast<int>(k / height), static_cast<int>(k % height));
            }
        }
        pos += run;
        value = !value;
    }
    return mask;
}

RleSegmentation encode_rle(const BinaryMask& mask) {
    RleSegmentation rle;
    rle.height = mask.height();
    rle.width = mask.width();
    bool current = false;
    std::uint32_t run = 0;
    for (int x = 0; x < mask.width(); ++x) {
        for (int y = 0; y < mask.height(); ++y) {
            if (mask.at(x, y) != current) {
                rle.counts.push_back(run);
                run = 0;
                current = !current;
            }
            ++run;
        }
    }
    rle.counts.push_back(run);
    return rle;
}

std::vector<std::uint32_t> rle_counts_from_string(std::string_view s) {
    std::vector<std::uint32_t> counts;
    std::size_t p = 0;
    while (p < s.size()) {
        std::int64_t x = 0;
        int k = 0;
        bool more = true;
        while (more) {
            if (p >= s.size()) {
                throw DataError("truncated compressed RLE string");
            }
            int c = static_cast<unsigned char>(s[p]) - 48;
            if (c < 0 || c > 63) {
                throw DataError("invalid character in compressed RLE string");
            }
            x |= static_cast<std::int64_t>(c & 0x1f) << (5 * k);
            more = (c & 0x20) != 0;
            ++p;
            ++k;
            if (!more && (c & 0x10)) {
                x |= static_cast<std::int64_t>(-1) * (std::int64_t{1} << (5 * k));
            }
        }
        // COCO stores runs after the third as deltas against the run two back.
        if (counts.size() > 2) {
            x += counts[counts.size() - 2];
        }
        if (x < 0 || x > std::numeric_limits<std::uint32_t>::max()) {
            throw DataError("compressed RLE run out of range");
        }
        counts.push_back(static_cast<std::uint32_t>(x));
    }
    return counts;
}

std::string rle_counts_to_string(std::span<const std::uint32_t> counts) {
    std::string s;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        std::int64_t x = counts[i];
        if (i > 2) {
            x -= counts[i - 2];
        }
        bool more = true;
        while (more) {
            std::int64_t c = x & 0x1f;
            x >>= 5;
            more = (c & 0x10) ? x != -1 : x != 0;
            if (more) {
                c |= 0x20;
            }
            s.push_back(static_cast<char>(c + 48));
        }
    }
    return s;
}

BinaryMask rasterize_polygon(std::span<const double> points, int width, int height) {
    if (points.size() % 2 != 0) {
        throw ShapeError("polygon point list has odd length " + std::to_string(points.size()));
    }
    if (points.size() < 6) {
        throw ShapeError("polygon needs at least 3 vertices");
    }
    for (double v : points) {
        if (!std::isfinite(v)) {
            throw ShapeError("polygon coordinates must be finite");
        }
    }
    BinaryMask mask(width, height);
    const std::size_t n = points.size() / 2;
    std::vector<double> crossings;
    for (int j = 0; j < height; ++j) {
        const double yc = j + 0.5;
        crossings.clear();
        for (std::size_t i = 0, k = n - 1; i < n; k = i++) {
            const double xi = points[2 * i], yi = points[2 * i + 1];
            const double xk = points[2 * k], yk = points[2 * k + 1];
            if ((yi > yc) != (yk > yc)) {
                crossings.push_back((xk - xi) * (yc - yi) / (yk - yi) + xi);
            }
        }
        if (crossings.empty()) {
            continue;
        }
        std::sort(crossings.begin(), crossings.end());
        // A center is inside when an odd number of crossings lie strictly to its right,
        // i.e. when an odd number lie at or to its left.
        std::size_t passed = 0;
        for (int i = 0; i < width; ++i) {
            const double xc = i + 0.5;
            while (passed < crossings.size() && crossings[passed] <= xc) {
                ++passed;
            }
            if (passed % 2 == 1) {
                mask.set(i, j);
            }
        }
    }
    return mask;
}

BinaryMask annotation_mask(const SegmentationAnnotation& ann, const ImageRecord& image) {
    if (const auto* rle = std::get_if<RleSegmentation>(&ann.segmentation)) {
        if (rle->height != image.height || rle->width != image.width) {
            throw DimensionError(ann_tag(ann.id) + ": RLE size does not match image dimensions");
        }
        return decode_rle(rle->height, rle->width, rle->counts);
    }
    const auto& poly = std::get<PolygonSegmentation>(ann.segmentation);
    BinaryMask mask(image.width, image.height);
    for (const auto& ring : poly.rings) {
        mask |= rasterize_polygon(ring, image.width, image.height);
    }
    return mask;
}

}  // namespace som
