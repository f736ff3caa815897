package com.example.app05;

public class MainActivity {
    private String name = "item 5";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 5);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
