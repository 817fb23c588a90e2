// Builds the bundled accounting fixture: a 104-image manifest whose
// per-phase and per-class object counts match the reference breakdown
// (3775 + 2604 + 633 = 7012 objects). Objects are small axis-aligned
// squares on a fixed grid; geometry is integer, so the file round-trips
// exactly.

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "foram/dataset.hpp"

using namespace foram;

namespace {

constexpr int kImageSize = 128;
constexpr int kCell = 12;
constexpr int kBox = 8;
constexpr int kOffset = 4;
constexpr int kCols = 10; // 10 * 9 = 90 slots per image
constexpr int kRows = 9;

Polygon slot_polygon(int slot) {
    const int col = slot % kCols;
    const int row = slot / kCols;
    const double x0 = kOffset + kCell * col;
    const double y0 = kOffset + kCell * row;
    Polygon p;
    p.vertices = {{x0, y0}, {x0 + kBox, y0}, {x0 + kBox, y0 + kBox}, {x0, y0 + kBox}};
    return p;
}

ImageRecord make_image(int id, int phase, const std::vector<ClassLabel>& labels) {
    ImageRecord img;
    img.id = id;
    char file[32];
    std::snprintf(file, sizeof(file), "plate_%03d.png", id);
    img.file = file;
    img.width = kImageSize;
    img.height = kImageSize;
    img.phase = phase;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        AnnotationRecord ann;
        ann.id = static_cast<int>(k) + 1;
        ann.label = labels[k];
        ann.iscrowd = false;
        ann.polygon = slot_polygon(static_cast<int>(k));
        img.annotations.push_back(std::move(ann));
    }
    return img;
}

// n images of one class, object counts descending from `high` so the total
// comes out right (e.g. 82,82,82,82,82,82,81,81,81,81,81 for 897/11).
std::vector<std::vector<ClassLabel>> single_class_images(ClassLabel label, int n_images,
                                                         int total) {
    const int low = total / n_images;
    const int n_high = total - low * n_images; // images carrying low+1 objects
    std::vector<std::vector<ClassLabel>> images;
    for (int i = 0; i < n_images; ++i) {
        images.emplace_back(i < n_high ? low + 1 : low, label);
    }
    return images;
}

} // namespace

int main(int argc, char** argv) {
    const std::string out = argc > 1 ? argv[1] : "data/survey.manifest";

    Manifest m;
    m.name = "foram-accounting-fixture";
    int next_id = 1;

    // phase 1: 48 single-class images, 3775 objects
    const std::array<std::pair<int, int>, 4> phase1 = {{{3, 172}, {11, 897}, {9, 726}, {25, 1980}}};
    // phase 2: 41 single-class images, 2604 objects
    const std::array<std::pair<int, int>, 4> phase2 = {{{9, 583}, {11, 695}, {10, 657}, {11, 669}}};
    for (int phase = 1; phase <= 2; ++phase) {
        const auto& plan = phase == 1 ? phase1 : phase2;
        for (int c = 0; c < 4; ++c) {
            for (auto& labels : single_class_images(kAllClasses[c], plan[c].first, plan[c].second)) {
                m.images.push_back(make_image(next_id++, phase, labels));
            }
        }
    }

    // phase 3: 15 mixed images, 633 objects (154/156/155/168 per class),
    // labels interleaved then dealt out 43/43/43/42/.../42
    std::array<int, 4> left = {154, 156, 155, 168};
    std::vector<ClassLabel> pool;
    while (left[0] + left[1] + left[2] + left[3] > 0) {
        for (int c = 0; c < 4; ++c) {
            if (left[c] > 0) {
                pool.push_back(kAllClasses[c]);
                --left[c];
            }
        }
    }
    std::size_t cursor = 0;
    for (int i = 0; i < 15; ++i) {
        const std::size_t take = i < 3 ? 43 : 42;
        std::vector<ClassLabel> labels(pool.begin() + cursor, pool.begin() + cursor + take);
        cursor += take;
        m.images.push_back(make_image(next_id++, 3, labels));
    }

    save_manifest(m, out);

    const DatasetStats stats = dataset_stats(m);
    std::printf("wrote %s: %zu images, %zu objects\n", out.c_str(), stats.combined.images,
                stats.combined.objects);
    for (int p = 0; p < 3; ++p) {
        std::printf("  phase %d: %zu images, %zu objects\n", p + 1, stats.phases[p].images,
                    stats.phases[p].objects);
    }
    std::printf("  classes: %zu / %zu / %zu / %zu\n", stats.combined.per_class[0],
                stats.combined.per_class[1], stats.combined.per_class[2],
                stats.combined.per_class[3]);
    return 0;
}
