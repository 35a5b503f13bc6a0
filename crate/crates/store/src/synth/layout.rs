//! Integer page layouts for synthetic sessions.

use interest_core::event::FragmentRects;
use interest_core::model::{ContentId, DeviceClass, Fragment, FragmentId, PageClass, PageId, Rect, Webpage};

/// Axis-aligned rectangle in integer page pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IRect {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
}

impl IRect {
    pub const fn new(x: i64, y: i64, w: i64, h: i64) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> i64 {
        self.w * self.h
    }

    pub fn overlap_area(&self, other: &IRect) -> i64 {
        let dx = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let dy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        dx.max(0) * dy.max(0)
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.x && x <= self.x + self.w && y >= self.y && y <= self.y + self.h
    }

    pub fn spans_y(&self, y: i64) -> bool {
        y >= self.y && y <= self.y + self.h
    }

    pub fn to_rect(self) -> Rect {
        Rect::new(self.x as f64, self.y as f64, self.w as f64, self.h as f64)
    }
}

/// Half of the fragment in view, or half of the view covered by a fragment
/// taller than it.
pub fn visible_in(fragment: &IRect, view: &IRect) -> bool {
    let overlap = fragment.overlap_area(view);
    2 * overlap >= fragment.area() || (fragment.h > view.h && 2 * overlap >= view.area())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviceGeometry {
    pub viewport_w: i64,
    pub viewport_h: i64,
    /// Row height of teasers and paragraphs.
    pub row: i64,
    /// Scroll granularity.
    pub step: i64,
    pub column_x: [i64; 2],
    pub column_w: i64,
    pub text_x: i64,
    pub text_w: i64,
}

impl DeviceGeometry {
    pub fn of(device: DeviceClass) -> Self {
        match device {
            DeviceClass::Desktop => Self {
                viewport_w: 1280,
                viewport_h: 800,
                row: 400,
                step: 100,
                column_x: [100, 650],
                column_w: 500,
                text_x: 100,
                text_w: 1000,
            },
            DeviceClass::Mobile => Self {
                viewport_w: 400,
                viewport_h: 720,
                row: 360,
                step: 90,
                column_x: [10, 200],
                column_w: 180,
                text_x: 10,
                text_w: 380,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub id: FragmentId,
    pub rect: IRect,
    pub parent: Option<FragmentId>,
    pub content: Option<ContentId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageLayout {
    pub page: Webpage,
    pub geometry: DeviceGeometry,
    /// Outer fragments first.
    pub cells: Vec<Cell>,
    pub content_height: i64,
}

impl PageLayout {
    pub fn page_id(&self) -> &PageId {
        &self.page.page_id
    }

    pub fn fragments(&self) -> Vec<Fragment> {
        self.cells
            .iter()
            .map(|c| Fragment {
                fragment_id: c.id.clone(),
                page_id: self.page.page_id.clone(),
                parent_id: c.parent.clone(),
                dom_path: String::new(),
                content_id: c.content.clone(),
            })
            .collect()
    }

    pub fn rects(&self) -> FragmentRects {
        self.cells.iter().map(|c| (c.id.clone(), c.rect.to_rect())).collect()
    }

    pub fn cell(&self, id: &FragmentId) -> Option<&Cell> {
        self.cells.iter().find(|c| &c.id == id)
    }

    fn depth(&self, cell: &Cell) -> usize {
        let mut depth = 0;
        let mut parent = cell.parent.as_ref();
        while let Some(p) = parent {
            depth += 1;
            parent = self.cell(p).and_then(|c| c.parent.as_ref());
        }
        depth
    }

    /// Deepest cell containing the point; callers keep points off shared
    /// edges so there is never a tie.
    pub fn innermost_at(&self, x: i64, y: i64) -> Option<&Cell> {
        self.cells
            .iter()
            .filter(|c| c.rect.contains(x, y))
            .max_by_key(|c| self.depth(c))
    }

    pub fn viewport(&self, top: i64) -> IRect {
        IRect::new(0, top, self.geometry.viewport_w, self.geometry.viewport_h)
    }

    /// Like [`Self::innermost_at`] for a point given in doubled coordinates,
    /// so midpoints of integer points stay exact.
    pub fn innermost_at_doubled(&self, x2: i64, y2: i64) -> Option<&Cell> {
        self.cells
            .iter()
            .filter(|c| {
                let r = c.rect;
                x2 >= 2 * r.x && x2 <= 2 * (r.x + r.w) && y2 >= 2 * r.y && y2 <= 2 * (r.y + r.h)
            })
            .max_by_key(|c| self.depth(c))
    }

    /// Largest scroll offset that keeps the viewport inside the content.
    pub fn max_top(&self) -> i64 {
        let g = &self.geometry;
        ((self.content_height - g.viewport_h).max(0) / g.step) * g.step
    }

    pub fn parents(&self) -> impl Iterator<Item = (&FragmentId, &FragmentId)> {
        self.cells.iter().filter_map(|c| c.parent.as_ref().map(|p| (&c.id, p)))
    }
}

pub const ARTICLE_COUNT: usize = 8;

pub fn paragraphs_of(article: usize) -> usize {
    3 + article % 4
}

pub fn content_of(article: usize) -> ContentId {
    ContentId::new(format!("c{article}"))
}

pub fn overview_id() -> PageId {
    PageId::new("overview")
}

pub fn article_id(article: usize) -> PageId {
    PageId::new(format!("article-{article}"))
}

/// Two columns of teasers, one per article.
pub fn overview_layout(device: DeviceClass) -> PageLayout {
    let g = DeviceGeometry::of(device);
    let cells = (0..ARTICLE_COUNT)
        .map(|k| Cell {
            id: FragmentId::new(format!("overview/t{k}")),
            rect: IRect::new(g.column_x[k % 2], (k / 2) as i64 * g.row, g.column_w, g.row),
            parent: None,
            content: Some(content_of(k)),
        })
        .collect();
    PageLayout {
        page: Webpage {
            page_id: overview_id(),
            url: "/overview".into(),
            page_class: PageClass::Overview,
        },
        geometry: g,
        cells,
        content_height: ARTICLE_COUNT.div_ceil(2) as i64 * g.row,
    }
}

/// A full-width article container with stacked paragraphs inside.
pub fn article_layout(device: DeviceClass, article: usize) -> PageLayout {
    let g = DeviceGeometry::of(device);
    let page_id = article_id(article);
    let n = paragraphs_of(article) as i64;
    let body = FragmentId::new(format!("{page_id}/body"));
    let mut cells = vec![Cell {
        id: body.clone(),
        rect: IRect::new(0, 0, g.viewport_w, n * g.row),
        parent: None,
        content: Some(content_of(article)),
    }];
    cells.extend((0..n).map(|i| Cell {
        id: FragmentId::new(format!("{page_id}/p{i}")),
        rect: IRect::new(g.text_x, i * g.row, g.text_w, g.row),
        parent: Some(body.clone()),
        content: None,
    }));
    PageLayout {
        page: Webpage {
            page_id: page_id.clone(),
            url: format!("/{page_id}"),
            page_class: PageClass::Detail,
        },
        geometry: g,
        cells,
        content_height: n * g.row,
    }
}
