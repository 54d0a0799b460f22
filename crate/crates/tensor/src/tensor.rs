use std::cell::{Cell, Ref, RefCell, RefMut};
use std::fmt;
use std::rc::Rc;

/// Identifies the tape and node a tensor is currently attached to.
pub(crate) type Binding = (u64, usize);

pub(crate) struct Inner {
    pub(crate) shape: Vec<usize>,
    pub(crate) data: RefCell<Vec<f64>>,
    pub(crate) requires_grad: bool,
    pub(crate) grad: RefCell<Option<Vec<f64>>>,
    pub(crate) node: Cell<Option<Binding>>,
}

/// Dense row-major n-dimensional array of `f64`.
///
/// A `Tensor` is a shared handle: clones alias the same buffer. Tensors created
/// with [`Tensor::param`] are tracked — any tape operation consuming them records
/// a leaf so that [`crate::Tape::backward`] can accumulate into their `grad` slot.
#[derive(Clone)]
pub struct Tensor {
    pub(crate) inner: Rc<Inner>,
}

impl Tensor {
    /// Builds a tensor from a shape and row-major elements.
    ///
    /// Panics if `data.len()` does not equal the product of `shape` extents.
    pub fn new(shape: &[usize], data: Vec<f64>) -> Tensor {
        let n: usize = shape.iter().product();
        assert_eq!(
            n,
            data.len(),
            "tensor: shape {:?} wants {} elements, got {}",
            shape,
            n,
            data.len()
        );
        Tensor {
            inner: Rc::new(Inner {
                shape: shape.to_vec(),
                data: RefCell::new(data),
                requires_grad: false,
                grad: RefCell::new(None),
                node: Cell::new(None),
            }),
        }
    }

    /// A tracked tensor: participates in gradient computation as a leaf.
    pub fn param(shape: &[usize], data: Vec<f64>) -> Tensor {
        let n: usize = shape.iter().product();
        assert_eq!(
            n,
            data.len(),
            "tensor: shape {:?} wants {} elements, got {}",
            shape,
            n,
            data.len()
        );
        Tensor {
            inner: Rc::new(Inner {
                shape: shape.to_vec(),
                data: RefCell::new(data),
                requires_grad: true,
                grad: RefCell::new(None),
                node: Cell::new(None),
            }),
        }
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor::new(shape, vec![0.0; shape.iter().product()])
    }

    pub fn full(shape: &[usize], v: f64) -> Tensor {
        Tensor::new(shape, vec![v; shape.iter().product()])
    }

    pub fn scalar(v: f64) -> Tensor {
        Tensor::new(&[], vec![v])
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn len(&self) -> usize {
        self.inner.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Borrows the elements. Panics if a mutable borrow is live.
    pub fn data(&self) -> Ref<'_, [f64]> {
        Ref::map(self.inner.data.borrow(), |v| v.as_slice())
    }

    /// Mutably borrows the elements (optimizer updates, test perturbations).
    pub fn data_mut(&self) -> RefMut<'_, [f64]> {
        RefMut::map(self.inner.data.borrow_mut(), |v| v.as_mut_slice())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.inner.data.borrow().clone()
    }

    /// The single element of a scalar tensor.
    ///
    /// Panics if the tensor holds more than one element.
    pub fn item(&self) -> f64 {
        let d = self.inner.data.borrow();
        assert_eq!(
            d.len(),
            1,
            "item: tensor of shape {:?} is not a scalar",
            self.inner.shape
        );
        d[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad
    }

    /// Gradient accumulated by the last backward pass(es), if any.
    pub fn grad(&self) -> Option<Vec<f64>> {
        self.inner.grad.borrow().clone()
    }

    /// Clears the accumulated gradient.
    pub fn zero_grad(&self) {
        *self.inner.grad.borrow_mut() = None;
    }

    /// Detached copy: same elements, untracked, unaliased.
    pub fn detached(&self) -> Tensor {
        Tensor::new(&self.inner.shape, self.to_vec())
    }

    pub(crate) fn binding(&self) -> Option<Binding> {
        self.inner.node.get()
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.inner.data.borrow();
        if d.len() <= 16 {
            write!(f, "Tensor{:?} {:?}", self.inner.shape, &d[..])
        } else {
            write!(
                f,
                "Tensor{:?} [{:.4}, {:.4}, .., {:.4}]",
                self.inner.shape,
                d[0],
                d[1],
                d[d.len() - 1]
            )
        }
    }
}
